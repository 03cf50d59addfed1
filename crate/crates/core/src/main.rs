fn main() {
    std::process::exit(roydennet::cli::run(std::env::args_os()));
}
