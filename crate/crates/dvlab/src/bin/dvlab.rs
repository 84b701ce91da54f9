fn main() {
    std::process::exit(dvlab::cli::run(std::env::args_os()));
}
