fn main() {
    // Subcommand dispatch lands here once the core library is in place.
    eprintln!("qstat: not yet wired");
    std::process::exit(2);
}
