fn main() {
    std::process::exit(zonal_sobolev::cli::run(std::env::args_os()));
}
