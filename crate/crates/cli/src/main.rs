fn main() {
    std::process::exit(deepcvx_cli::main_with_args(std::env::args_os()));
}
