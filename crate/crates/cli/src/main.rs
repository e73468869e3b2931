fn main() {
    std::process::exit(mittag_cli::dispatch(std::env::args_os()));
}
