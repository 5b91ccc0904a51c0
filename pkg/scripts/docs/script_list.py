scripts_to_hooks = {
    'weakbeam': 'scripts.weakbeam:main',
}

script_list = list(scripts_to_hooks.keys())
