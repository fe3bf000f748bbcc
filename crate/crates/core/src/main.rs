fn main() {
    std::process::exit(cosim_dse::cli::run(std::env::args_os()));
}
