use clap::Parser;

fn main() {
    let cli = fdrk::Cli::parse();
    match fdrk::run(&cli) {
        Ok(report) => println!("{report}"),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
