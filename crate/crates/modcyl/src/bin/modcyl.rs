fn main() {
    let threads = std::env::var("MODCYL_THREADS").ok();
    std::process::exit(modcyl::cli::run(std::env::args_os(), threads.as_deref()));
}
