fn main() {
    std::process::exit(bmpce::cli::main(std::env::args_os()));
}
