fn main() {
    std::process::exit(facetclip::cli::run(std::env::args_os()));
}
