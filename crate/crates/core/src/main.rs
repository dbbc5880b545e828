fn main() {
    std::process::exit(tandem_aoi::cli::main_with_args(std::env::args_os()));
}
