fn main() {
    std::process::exit(qmeas_cli::run(std::env::args_os()));
}
