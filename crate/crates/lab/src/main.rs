fn main() {
    std::process::exit(bondperc_lab::cli::run(std::env::args_os()));
}
