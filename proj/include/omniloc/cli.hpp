#pragma once
namespace omniloc { int run_cli(int argc, char** argv); }
