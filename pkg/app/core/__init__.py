# Core module - contains configuration and shared utilities
