pub mod zbb_oracle;
