mod augment;
mod fit;
mod generate;
mod oracle;
pub mod verify;

pub use augment::augment;
pub use fit::fit;
pub use generate::generate;
pub use oracle::oracle;
pub use verify::verify;
