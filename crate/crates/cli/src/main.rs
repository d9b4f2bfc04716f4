fn main() {
    std::process::exit(kronmode_cli::main_with_args(std::env::args_os()));
}
