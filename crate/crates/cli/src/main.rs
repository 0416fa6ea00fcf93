fn main() {
    std::process::exit(qmeas_cli::main_with_args(std::env::args_os()));
}
