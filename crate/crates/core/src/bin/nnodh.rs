fn main() {
    std::process::exit(nnodh::cli::main_with_args(std::env::args_os()));
}
