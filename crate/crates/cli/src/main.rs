fn main() {
    std::process::exit(cloak_cli::dispatch(std::env::args_os()));
}
