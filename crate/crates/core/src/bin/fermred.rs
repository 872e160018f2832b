fn main() {
    std::process::exit(fermred::cli::main_with_args(std::env::args_os()));
}
