fn main() {
    std::process::exit(mdsplus::cli::run());
}
