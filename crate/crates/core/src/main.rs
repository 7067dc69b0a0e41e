fn main() {
    std::process::exit(er_spectra::cli::run(std::env::args_os()));
}
