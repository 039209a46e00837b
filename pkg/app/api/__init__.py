# API module - contains the click command-line interface
