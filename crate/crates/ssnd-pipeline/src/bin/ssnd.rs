fn main() {
    std::process::exit(ssnd_pipeline::cli::cli(std::env::args_os()));
}
