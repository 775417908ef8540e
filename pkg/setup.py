"""This file is used to install your project as a package.
It is used by pip to install your project."""

from setuptools import setup, find_packages


# Function to read the requirements.txt file
def read_requirements():
    with open("requirements.txt", encoding="utf-8") as req_file:
        return req_file.read().splitlines()


setup(
    name="SCAB-Clustering",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=read_requirements(),
    entry_points={
        "console_scripts": [
            "scab=app.driver:main",
        ],
    },
    description="A command-line toolkit for deep clustering with confounding factor removal.",
    long_description=open("README.md", encoding="utf-8").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
)
