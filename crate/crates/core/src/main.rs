fn main() {
    std::process::exit(stbclab::cli::main_with_args(std::env::args_os()));
}
