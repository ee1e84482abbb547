fn main() {
    std::process::exit(vecsim::cli::run_cli(std::env::args_os()));
}
