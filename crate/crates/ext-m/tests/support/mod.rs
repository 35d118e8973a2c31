pub mod m_oracle;
