fn main() {
    std::process::exit(qwqkd::cli::dispatch(std::env::args_os()));
}
