fn main() {
    std::process::exit(dimred::harness::cli::cli_main(std::env::args_os()));
}
