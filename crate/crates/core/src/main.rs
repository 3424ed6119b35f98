fn main() {
    std::process::exit(gossipdyn::harness::cli::run_cli(std::env::args_os()));
}
