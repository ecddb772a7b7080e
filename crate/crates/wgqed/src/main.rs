fn main() {
    std::process::exit(wgqed::cli::dispatch(std::env::args()));
}
