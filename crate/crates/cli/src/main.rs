fn main() {
    std::process::exit(chaosync_cli::cli_main(std::env::args_os()));
}
