fn main() {
    std::process::exit(sfwm::cli::main_with_args(std::env::args_os()));
}
