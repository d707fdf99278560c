pub mod init;
pub mod keygen;
pub mod report;
pub mod run;
