fn main() {
    std::process::exit(paircorr_core::cli::run(std::env::args_os()));
}
