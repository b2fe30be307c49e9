#!/usr/bin/env python3
import os

import uvicorn

if __name__ == "__main__":
    # HAPTABLE_MAP / HAPTABLE_LUT select the served artifacts; the fixture map is used otherwise
    # Binding to 0.0.0.0 makes the server accessible from any network interface
    uvicorn.run("main:app", host=os.environ.get("HAPTABLE_HOST", "0.0.0.0"),
                port=int(os.environ.get("HAPTABLE_PORT", "8000")), reload=True)
