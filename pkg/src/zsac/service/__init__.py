"""HTTP service layer: pydantic schemas, workflow handlers, FastAPI app."""
