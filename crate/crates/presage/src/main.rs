use clap::Parser;
use presage::cli::{self, CliArgs, Command};

fn main() {
    let args = CliArgs::parse();
    let outcome = match &args.command {
        Command::Run(run_args) => cli::run(run_args).map(|report| {
            print!("{}", cli::summarize(&report));
            println!("report written to {}", run_args.report.display());
        }),
        Command::Suite(suite_args) => cli::suite(suite_args).map(|n| {
            println!("wrote {n} scenarios to {}", suite_args.out.display());
        }),
        Command::Demos(demo_args) => cli::demos(demo_args).map(|n| {
            println!(
                "wrote {n} demonstration records to {}",
                demo_args.out.display()
            );
        }),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
