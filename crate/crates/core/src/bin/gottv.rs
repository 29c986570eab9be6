fn main() {
    std::process::exit(gottv::cli::cli_main(std::env::args_os()));
}
