fn main() {
    std::process::exit(voldiff_cli::cli_run(std::env::args_os()));
}
