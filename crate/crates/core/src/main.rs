fn main() {
    std::process::exit(dynph::cli::main_with_args(std::env::args_os()));
}
