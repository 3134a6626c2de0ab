fn main() {
    std::process::exit(sst_cli::run(std::env::args_os()));
}
