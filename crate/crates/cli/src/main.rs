fn main() {
    std::process::exit(mforge_cli::run(std::env::args_os()));
}
