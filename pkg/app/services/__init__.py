# Services module - contains arithmetic, dynamics, ergodicity and verification services
