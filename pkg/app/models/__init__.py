# Models module - contains Pydantic schemas and the p-adic value types
