fn main() {
    std::process::exit(giantflux::cli::run(std::env::args_os()));
}
