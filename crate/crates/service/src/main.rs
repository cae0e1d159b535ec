fn main() {
    std::process::exit(hydrograph_service::cli::run(std::env::args_os()));
}
