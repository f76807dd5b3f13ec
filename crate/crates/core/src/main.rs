fn main() {
    std::process::exit(wtri::cli::main_with_args(std::env::args_os()));
}
