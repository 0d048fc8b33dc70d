fn main() {
    std::process::exit(fptorder_cli::run(std::env::args_os()));
}
