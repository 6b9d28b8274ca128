fn main() {
    std::process::exit(freemul::cli::main_with_args(std::env::args_os()));
}
