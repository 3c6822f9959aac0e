fn main() {
    std::process::exit(aitsde::cli::parse_and_dispatch(std::env::args_os()));
}
