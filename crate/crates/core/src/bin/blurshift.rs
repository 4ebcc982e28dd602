fn main() {
    std::process::exit(blurshift::cli::main_with_args(std::env::args_os()));
}
