# data/__init__.py
# Empty file to make the directory a Python package 