fn main() {
    std::process::exit(nschsim::run(std::env::args_os()));
}
