fn main() {
    std::process::exit(adresparse_cli::run(std::env::args_os()));
}
