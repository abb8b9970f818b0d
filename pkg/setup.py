from setuptools import setup, find_packages


def get_requirements() -> list[str]:
    requirement_list: list[str] = []
    with open("requirement.txt") as requirement_file:
        for line in requirement_file:
            line = line.strip()
            if line and not line.startswith("-e"):
                requirement_list.append(line)
    return requirement_list


setup(
    name='dtameta',
    version='0.1.0',
    packages=find_packages(exclude=("tests", "tests.*")),
    install_requires=get_requirements(),
    python_requires='>=3.9',
)
