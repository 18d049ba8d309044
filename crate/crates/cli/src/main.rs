fn main() {
    std::process::exit(odo_cli::dispatch(std::env::args_os()));
}
