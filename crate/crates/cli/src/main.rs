fn main() {
    std::process::exit(menusize_cli::run(std::env::args_os()));
}
