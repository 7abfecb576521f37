fn main() {
    std::process::exit(loadcast::cli::main_with_args(std::env::args_os()));
}
